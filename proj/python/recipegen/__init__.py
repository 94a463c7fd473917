# Copyright 2026 The recipegen Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Ingredient-conditioned recipe generation.

Thin re-export of the compiled extension. Models are plain C++ objects; a
trained model is read-only and can be shared across threads for generation.
"""

from ._recipegen import (
    BleuScore,
    CompatibilityError,
    ContextOverflowError,
    DivergenceError,
    EmptyCorpusError,
    FormatError,
    GeneratedRecipe,
    IngredientLine,
    InsufficientDataError,
    IoError,
    Model,
    PrepResult,
    Recipe,
    RecipegenError,
    RunConfig,
    SamplingParams,
    SynthCorpus,
    TaggedDocument,
    TrainConfig,
    TrainReport,
    UnparseableError,
    ValidationError,
    bleu,
    corpus_bleu,
    cross_entropy,
    evaluate,
    export_records,
    generate,
    ingest,
    length_stats,
    parse,
    perplexity,
    prepare,
    read_documents,
    serialize,
    split_recipes,
    strip_tags,
    synthesize_corpus,
    train,
    write_documents,
)

__version__ = "0.1.0"
__all__ = [name for name in dir() if not name.startswith("_")]
