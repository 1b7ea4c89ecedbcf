from pathlib import Path

import pytest

from elqa.converters import (
    convert_coref,
    convert_sluice,
    convert_squad,
    convert_vpe,
    read_conll,
    read_sluice_records,
    read_vpe_records,
)
from elqa.converters.vpe import load_tokenized_documents
from elqa.core import Split, Task

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def sluice_conversion():
    with open(FIXTURES / "sluice.jsonl", encoding="utf-8") as f:
        records = read_sluice_records(f)
    return convert_sluice(records)


@pytest.fixture(scope="session")
def wsj_documents():
    return {d.doc_id: d for d in load_tokenized_documents(FIXTURES / "wsj")}


@pytest.fixture(scope="session")
def vpe_instances(wsj_documents):
    with open(FIXTURES / "vpe.jsonl", encoding="utf-8") as f:
        records = read_vpe_records(f)
    return convert_vpe(records, wsj_documents)


def _conll_instances(task: Task, stem: str):
    instances, documents = [], []
    for split in Split:
        with open(FIXTURES / f"{stem}.{split.value}.conll", encoding="utf-8") as f:
            for coref_doc in read_conll(f):
                instances.extend(convert_coref(coref_doc, task, split))
                documents.append(coref_doc.document)
    return instances, documents


@pytest.fixture(scope="session")
def onto_corpus():
    return _conll_instances(Task.COREF_ONTONOTES, "onto")


@pytest.fixture(scope="session")
def wikicoref_corpus():
    return _conll_instances(Task.COREF_WIKICOREF, "wikicoref")


@pytest.fixture(scope="session")
def squad_corpus():
    instances, documents = [], []
    for split, name in ((Split.TRAIN, "squad.train.json"), (Split.DEV, "squad.dev.json")):
        with open(FIXTURES / name, encoding="utf-8") as f:
            result = convert_squad(f, split)
        instances.extend(result.instances)
        documents.extend(result.documents)
    return instances, documents


@pytest.fixture(scope="session")
def full_corpus(sluice_conversion, vpe_instances, wsj_documents, onto_corpus,
                wikicoref_corpus, squad_corpus):
    """Every fixture corpus merged: (instances, {doc_id: Document})."""
    instances = list(sluice_conversion.instances) + list(vpe_instances)
    documents = {d.doc_id: d for d in sluice_conversion.documents}
    documents.update(wsj_documents)
    for insts, docs in (onto_corpus, wikicoref_corpus, squad_corpus):
        instances.extend(insts)
        documents.update({d.doc_id: d for d in docs})
    return instances, documents
