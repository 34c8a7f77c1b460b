"""Character-level RNN language models: plain, word-conditioned, and
n-gram-conditioned-output variants, with BPC/BPB evaluation tooling."""

from .corpus import (BitStream, CharVocab, EncodedStream, WordVocab,
                     build_char_vocab, build_word_vocab, encode_bits,
                     encode_stream, oov_rate, split_lines)
from .estimators import CharRNN, NGramConditionedCharRNN, WordConditionedCharRNN
from .evaluate import EvalReport, bpc_from_bpb, evaluate, report_table
from .kernels import Rng, clip_elementwise, matvec, sample_categorical, sigmoid, softmax
from .models import (CondCharRNN, CondParams, CRNNParams, MixedCharRNN,
                     MixedParams, PlainCharRNN, sample_text)
from .ngrams import NGramIndex, build_index, count_ngrams
from .trainer import (Checkpoint, TrainConfig, TrainState, fit, init_model,
                      load_checkpoint, lr_schedule, save_checkpoint, train_epoch)

__version__ = "0.1.0"
