#pragma once

#include <string>
#include <vector>

#include "frs/model.hpp"
#include "frs/text.hpp"

namespace frs {

// JSONL dataset: one {"text": str, "label": int, "poisoned"?: bool} object
// per line, tokenized against `vocab`. Labels outside [0, label_count) and
// malformed lines raise line-numbered validation errors; file order is kept.
std::vector<LabeledExample> load_dataset(const std::string& path, const Vocabulary& vocab,
                                         int label_count);

void save_dataset(const std::vector<LabeledExample>& data, const Vocabulary& vocab,
                  const std::string& path);

}  // namespace frs
