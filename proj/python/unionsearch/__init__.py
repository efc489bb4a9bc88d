# Copyright 2026 The UnionSearch Authors
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

"""Table union search: find lake tables that can be unioned with a query table."""

from ._unionsearch import (
    BadQuery,
    BuildError,
    Config,
    ConfigError,
    DataLake,
    EmptyIndex,
    EmptyTable,
    EncoderParams,
    Engine,
    Error,
    IoError,
    PreconditionError,
    Table,
    TooFewTables,
    TrainingDiverged,
    adaptive_cutoff,
    embed,
    gen_synthetic_lake,
    ingest_csv,
    load_lake,
    map_at_k,
    parse_csv,
    precision_recall,
    recall_upper_bound,
    run_cli,
    tokenize_value,
    train,
    write_lake,
)

__version__ = "0.1.0"
