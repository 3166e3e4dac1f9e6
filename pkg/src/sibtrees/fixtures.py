"""Small named presentations and embeddings used by the tests, the CLI demos
and the example files under ``trees/``."""

from __future__ import annotations

from functools import lru_cache
from typing import Dict, List

from .dsl import Document, parse
from .embedding import PresentedEmbedding
from .presentation import TreePresentation

SOURCES: Dict[str, str] = {
    "RAY": """
# one-way infinite path
presentation RAY {
  core { vertices v0; edges; basepoint v0; }
  arm A at v0 { prefix []; period [()]; }
}
embedding shift on RAY {
  patch { v0 -> A.0; }
  rule A -> A shift 1 from 0;
}
""",
    "DRAY": """
# two-way infinite path through v0
presentation DRAY {
  core { vertices v0; edges; basepoint v0; }
  arm A at v0 { prefix []; period [()]; }
  arm B at v0 { prefix []; period [()]; }
}
embedding shift on DRAY {
  patch { v0 -> A.0; B.0 -> v0; }
  rule A -> A shift 1 from 0;
  rule B -> B shift -1 from 1;
}
embedding back on DRAY {
  patch { v0 -> B.0; A.0 -> v0; }
  rule A -> A shift -1 from 1;
  rule B -> B shift 1 from 0;
}
embedding reflect on DRAY {
  patch { v0 -> v0; }
  rule A -> B shift 0 from 0;
  rule B -> A shift 0 from 0;
}
""",
    "COMB": """
# a tooth at every spine vertex
presentation COMB {
  core { vertices v0; edges; basepoint v0; }
  arm A at v0 { prefix []; period [(())]; }
}
embedding shift on COMB {
  patch { v0 -> A.0; }
  rule A -> A shift 1 from 0;
}
""",
    "GROWCOMB": """
# a path with n edges hangs at spine vertex A.n
presentation GROWCOMB {
  core { vertices v0; edges; basepoint v0; }
  arm A at v0 { family path 1 n + 0; }
}
embedding shift on GROWCOMB {
  patch { v0 -> A.0; }
  rule A -> A shift 1 from 0;
}
""",
    "SPIDER3": """
# three rays glued at v0
presentation SPIDER3 {
  core { vertices v0; edges; basepoint v0; }
  arm A at v0 { prefix []; period [()]; }
  arm B at v0 { prefix []; period [()]; }
  arm C at v0 { prefix []; period [()]; }
}
embedding rotate on SPIDER3 {
  patch { v0 -> v0; }
  rule A -> B shift 0 from 0;
  rule B -> C shift 0 from 0;
  rule C -> A shift 0 from 0;
}
""",
    "HALFCOMB": """
# teeth along A, bare spine along B
presentation HALFCOMB {
  core { vertices v0; edges; basepoint v0; }
  arm A at v0 { prefix []; period [(())]; }
  arm B at v0 { prefix []; period [()]; }
}
embedding shift on HALFCOMB {
  patch { v0 -> A.0; B.0 -> v0; }
  rule A -> A shift 1 from 0;
  rule B -> B shift -1 from 1;
}
""",
    "DCOMB": """
# two-way comb: the tooth at the centre is t0
presentation DCOMB {
  core { vertices v0 t0; edges v0-t0; basepoint v0; }
  arm A at v0 { prefix []; period [(())]; }
  arm B at v0 { prefix []; period [(())]; }
}
embedding shift on DCOMB {
  patch { v0 -> A.0; t0 -> A.0.1; B.0 -> v0; B.0.1 -> t0; }
  rule A -> A shift 1 from 0;
  rule B -> B shift -1 from 1;
}
embedding back on DCOMB {
  patch { v0 -> B.0; t0 -> B.0.1; A.0 -> v0; A.0.1 -> t0; }
  rule A -> A shift -1 from 1;
  rule B -> B shift 1 from 0;
}
""",
    "DCOMB_NO_CENTER": """
# two-way comb missing the tooth at v0; it has no shift
presentation DCOMB_NO_CENTER {
  core { vertices v0; edges; basepoint v0; }
  arm A at v0 { prefix []; period [(())]; }
  arm B at v0 { prefix []; period [(())]; }
}
embedding shift on DCOMB_NO_CENTER {
  patch { v0 -> A.0; }
  rule A -> A shift 1 from 0;
  rule B -> B shift -1 from 0;
}
""",
    "TOOTHED_RAY": """
# ray r0 r1 r2 ... with a pendant vertex x_n at every r_n
# (r0 and x0 are core vertices, r_n = A.(n-1), x_n = A.(n-1).1)
presentation TOOTHED_RAY {
  core { vertices r0 x0; edges r0-x0; basepoint r0; }
  arm A at r0 { prefix []; period [(())]; }
}
""",
}

NAMES: List[str] = list(SOURCES)


@lru_cache(maxsize=None)
def document(name: str) -> Document:
    return parse(SOURCES[name])


def fixture(name: str) -> TreePresentation:
    return document(name).presentation(name)


def embedding(name: str, emb: str = "shift") -> PresentedEmbedding:
    return document(name).embeddings[emb]


def all_fixtures() -> Dict[str, TreePresentation]:
    return {n: fixture(n) for n in NAMES}
