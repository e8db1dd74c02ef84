#include "icc/dataset_io.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "icc/error.hpp"

namespace icc {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string read_file(const std::string& path, ErrorCode code) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(code, "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string string_or(const json& j, const char* key, std::string fallback = {}) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  if (!j.at(key).is_string()) {
    throw Error(ErrorCode::kTemplate, std::string("template key '") + key + "' must be a string");
  }
  return j.at(key).get<std::string>();
}

std::string resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return (path.is_absolute() ? path : base / path).lexically_normal().string();
}

}  // namespace

PromptTemplate template_from_json(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kTemplate, std::string("template is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::kTemplate, "template must be a JSON object");
  PromptTemplate t;
  t.family = parse_template_family(string_or(j, "family", "single-input"));
  t.instruction = string_or(j, "instruction");
  t.example_block = string_or(j, "example_block");
  t.query_block = string_or(j, "query_block");
  t.separator = string_or(j, "separator", "\n");
  t.label_prefix = string_or(j, "label_prefix");
  if (j.contains("field_names")) {
    for (const auto& f : j.at("field_names")) t.field_names.push_back(f.get<std::string>());
  } else if (t.family == TemplateFamily::kSingleInput) {
    t.field_names = {"input"};
  } else if (t.family == TemplateFamily::kNliPair) {
    t.field_names = {"premise", "hypothesis"};
  }
  t.finalize();
  return t;
}

PromptTemplate load_template(const std::string& path) {
  return template_from_json(read_file(path, ErrorCode::kTemplate));
}

std::vector<Example> parse_examples_jsonl(std::string_view text, const LabelSpace& ls,
                                          const std::string& source) {
  std::vector<Example> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (trim(line).empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    try {
      const auto j = json::parse(line);
      Example e;
      for (const auto& [name, value] : j.at("fields").items()) {
        if (!value.is_string()) throw Error(ErrorCode::kDataset, where + ": field '" + name + "' is not a string");
        e.fields[name] = value.get<std::string>();
      }
      const auto label = j.at("label").get<std::string>();
      const auto idx = ls.index_of(label);
      if (!idx) throw Error(ErrorCode::kDataset, where + ": label '" + label + "' is not in the label space");
      e.gold_label = *idx;
      out.push_back(std::move(e));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kDataset, where + ": " + e.what());
    }
  }
  return out;
}

std::vector<Example> load_examples_jsonl(const std::string& path, const LabelSpace& ls) {
  return parse_examples_jsonl(read_file(path, ErrorCode::kDataset), ls, path);
}

Dataset load_dataset(const std::string& metadata_path) {
  const auto text = read_file(metadata_path, ErrorCode::kDataset);
  json meta;
  try {
    meta = json::parse(text);
    const fs::path base = fs::path(metadata_path).parent_path();
    std::vector<std::string> labels;
    for (const auto& l : meta.at("label_space")) labels.push_back(l.get<std::string>());
    const auto template_ref = meta.at("template_ref").get<std::string>();
    Dataset ds(meta.at("name").get<std::string>(), LabelSpace(std::move(labels)),
               load_template(resolve(base, template_ref)));
    ds.template_ref = template_ref;
    ds.family = parse_dataset_family(meta.value("family", std::string("custom")));
    const auto& splits = meta.at("splits");
    ds.train = load_examples_jsonl(resolve(base, splits.at("train").get<std::string>()), ds.label_space);
    ds.eval = load_examples_jsonl(resolve(base, splits.at("eval").get<std::string>()), ds.label_space);
    if (meta.contains("corpus")) ds.corpus_path = resolve(base, meta.at("corpus").get<std::string>());
    return ds;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kDataset, metadata_path + ": " + e.what());
  }
}

std::string default_data_dir() {
  if (const char* env = std::getenv("ICC_DATA_DIR"); env && *env) return env;
#ifdef ICC_DEFAULT_DATA_DIR
  return ICC_DEFAULT_DATA_DIR;
#else
  return "data";
#endif
}

std::string resolve_dataset_path(const std::string& name_or_path, const std::string& data_dir) {
  if (fs::is_regular_file(name_or_path)) return name_or_path;
  const fs::path candidate = fs::path(data_dir) / name_or_path / "dataset.json";
  if (fs::is_regular_file(candidate)) return candidate.string();
  throw Error(ErrorCode::kDataset, "dataset '" + name_or_path + "' not found (looked in " +
                                       fs::path(data_dir).string() + ")");
}

std::string default_corpus(const Dataset& ds) {
  if (!ds.corpus_path.empty()) return read_file(ds.corpus_path, ErrorCode::kIo);
  PromptTemplate t = ds.prompt_template;
  t.instruction.clear();
  DemoSet all;
  all.demos = ds.train;
  Example empty;
  for (const auto& f : t.field_names) empty.fields[f] = "";
  const std::string tail = t.separator + render_with_context(t, all, {}, empty, ds.label_space).text;
  std::string corpus;
  for (std::size_t i = 0; i < all.demos.size(); ++i) {
    // Render a one-demo prompt and drop the (empty) query block.
    const std::vector<std::size_t> one{i};
    auto text = render_with_context(t, all, one, empty, ds.label_space).text;
    corpus += text.substr(0, text.size() - tail.size());
    corpus += '\n';
  }
  return corpus;
}

}  // namespace icc
