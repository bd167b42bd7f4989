#include "frs/dataset.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "frs/errors.hpp"

namespace frs {

std::vector<LabeledExample> load_dataset(const std::string& path, const Vocabulary& vocab,
                                         int label_count) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open dataset: " + path);
  std::vector<LabeledExample> out;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(path + ":" + std::to_string(line_no) + ": malformed JSON (" +
                            e.what() + ")");
    }
    if (!j.contains("text") || !j["text"].is_string() || !j.contains("label") ||
        !j["label"].is_number_integer())
      throw ValidationError(path + ":" + std::to_string(line_no) +
                            ": expected {\"text\": str, \"label\": int}");
    LabeledExample ex;
    ex.text = tokenize(j["text"].get<std::string>(), vocab);
    ex.label = j["label"].get<int>();
    ex.poisoned = j.value("poisoned", false);
    if (ex.label < 0 || ex.label >= label_count)
      throw ValidationError(path + ":" + std::to_string(line_no) + ": label " +
                            std::to_string(ex.label) + " outside [0, " +
                            std::to_string(label_count) + ")");
    out.push_back(std::move(ex));
  }
  return out;
}

void save_dataset(const std::vector<LabeledExample>& data, const Vocabulary& vocab,
                  const std::string& path) {
  std::ofstream out(path);
  if (!out) throw NumericError("cannot write dataset: " + path);
  for (const auto& ex : data) {
    nlohmann::json j;
    j["text"] = detokenize(ex.text, vocab);
    j["label"] = ex.label;
    if (ex.poisoned) j["poisoned"] = true;
    out << j.dump() << '\n';
  }
}

}  // namespace frs
