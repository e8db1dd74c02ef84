#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "icc/core.hpp"
#include "icc/rng.hpp"

namespace icc {

enum class TemplateFamily { kSingleInput, kNliPair, kCustom };

const char* to_string(TemplateFamily family);
TemplateFamily parse_template_family(std::string_view name);

/// Prompt layout for one task.
///
/// Blocks use literal slot markers: "[NAME]" for the input field called
/// "name" (upper-cased in the marker) and "[LABEL]" for the verbalized
/// label. An optional instruction header may contain "[LABEL_SPACE]", which
/// expands to the displayed labels joined by ", ".
///
/// A prompt is instruction (if any), K demo blocks and the query block,
/// joined by `separator`. The query block is the example block with the
/// label slot left empty, so a rendered prompt ends with `label_prefix`.
struct PromptTemplate {
  TemplateFamily family = TemplateFamily::kSingleInput;
  std::string instruction;
  std::string example_block;
  std::string query_block;
  std::string separator = "\n";
  std::string label_prefix;
  std::vector<std::string> field_names;

  // Fills query_block and label_prefix when empty, then validates.
  // Throws Error(kTemplate) on a malformed layout.
  void finalize();
  void validate() const;
};

// Builds and finalizes a template. Empty query_block / label_prefix are
// derived from example_block.
PromptTemplate make_template(TemplateFamily family, std::string example_block,
                             std::vector<std::string> field_names,
                             std::string separator = "\n",
                             std::string instruction = {},
                             std::string query_block = {},
                             std::string label_prefix = {});

std::string slot_marker(std::string_view field_name);

// The string that follows label_prefix for `label`. A prefix that does not
// end in whitespace gets a single space before the label.
std::string label_continuation(const PromptTemplate& t, std::string_view label);

struct RenderedPrompt {
  std::string text;
  std::vector<std::size_t> demo_indices;
};

// Demos in DemoSet order with labels filled, then the query with the label
// slot empty. K = 0 renders the query block alone.
RenderedPrompt render_icl_prompt(const PromptTemplate& t, const DemoSet& demos,
                                 const Example& query, const LabelSpace& ls);

// Context of the demos listed in `context`, in the given order.
RenderedPrompt render_with_context(const PromptTemplate& t,
                                   const DemoSet& demos,
                                   std::span<const std::size_t> context,
                                   const Example& query, const LabelSpace& ls);

// Demo `held_out` becomes the query, conditioned on the other K-1 demos in
// their original order. With `shuffled`, each of its input fields is
// word-shuffled using `rng`; otherwise `rng` is not touched.
RenderedPrompt render_leave_one_out(const PromptTemplate& t,
                                    const DemoSet& demos, std::size_t held_out,
                                    bool shuffled, SeededRng& rng,
                                    const LabelSpace& ls);

// Splits on whitespace runs, permutes with Fisher-Yates, rejoins with
// single spaces.
std::string shuffle_words(std::string_view text, SeededRng& rng);

// Shuffles each field independently, in field-name order, with successive
// draws from `rng`. Words never cross field boundaries.
Example shuffle_example(const Example& e, SeededRng& rng);

}  // namespace icc
