// Copyright 2026 The preqeval Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// JSON views of result types. Key order is fixed by construction, so equal
// results always serialize to identical bytes.

#include "json.hpp"
#include "preqeval/coder.hpp"
#include "preqeval/curriculum.hpp"
#include "preqeval/learner.hpp"
#include "preqeval/prequential.hpp"

namespace preqeval {

using ordered_json = nlohmann::ordered_json;

ordered_json to_json(const HyperParams& hyper);
ordered_json to_json(const EvaluationProtocol& protocol);
ordered_json to_json(const CodelengthReport& report);
ordered_json to_json(const TransferReport& report);
ordered_json to_json(const BitstreamHeader& header);
ordered_json to_json(const CodeComparison& comparison);

// Splits a series into the points whose metric satisfies `keep`.
MetricSeries filter_series(const MetricSeries& series, bool (*keep)(const std::string& metric));

}  // namespace preqeval
