#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "icc/core.hpp"
#include "icc/eval.hpp"
#include "icc/prompting.hpp"

namespace icc {

// Template file: JSON object with keys family, instruction, example_block,
// query_block, separator, label_prefix, field_names. query_block and
// label_prefix may be omitted and are then derived from example_block.
PromptTemplate template_from_json(std::string_view json_text);
PromptTemplate load_template(const std::string& path);

// JSONL, one {"fields": {name: text, ...}, "label": str} object per line.
// Blank lines are skipped. Labels must name an entry of `ls`.
std::vector<Example> parse_examples_jsonl(std::string_view text, const LabelSpace& ls,
                                          const std::string& source = "<memory>");
std::vector<Example> load_examples_jsonl(const std::string& path, const LabelSpace& ls);

// Metadata sidecar: {name, label_space, template_ref, family,
// splits: {train, eval}, corpus?}. Relative paths resolve against the
// metadata file's directory.
Dataset load_dataset(const std::string& metadata_path);

// `name_or_path` is a metadata file path, or a dataset name looked up as
// <data_dir>/<name>/dataset.json.
std::string resolve_dataset_path(const std::string& name_or_path, const std::string& data_dir);

// Data directory used when none is given: $ICC_DATA_DIR, else the bundled
// data directory of the source tree.
std::string default_data_dir();

// Text for the n-gram backend: the dataset's corpus file if it names one,
// else every train example rendered as a labelled demo block.
std::string default_corpus(const Dataset& ds);

}  // namespace icc
