"""Corpus-to-embedding exporter for the selective-annotation toolkit."""

__version__ = "0.1.0"

from .corpus import CorpusRecord, read_corpus
from .encoders import EncoderUnavailable, HashingEncoder, get_encoder
from .export import encode_corpus
