#include "icc/prompting.hpp"

#include <algorithm>
#include <cctype>
#include <optional>

#include "icc/error.hpp"

namespace icc {

namespace {

constexpr std::string_view kLabelSlot = "[LABEL]";
constexpr std::string_view kLabelSpaceSlot = "[LABEL_SPACE]";

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

bool ends_with_space(std::string_view s) {
  return !s.empty() && std::isspace(static_cast<unsigned char>(s.back()));
}

std::string replace_all(std::string_view text, std::string_view from,
                        std::string_view to) {
  std::string out;
  std::size_t pos = 0;
  for (auto hit = text.find(from); hit != std::string_view::npos;
       hit = text.find(from, pos)) {
    out.append(text.substr(pos, hit - pos));
    out.append(to);
    pos = hit + from.size();
  }
  out.append(text.substr(pos));
  return out;
}

// Single left-to-right pass so substituted text is never re-scanned for
// markers.
std::string fill_block(const PromptTemplate& t, std::string_view block,
                       const Example& e,
                       const std::optional<std::string>& label) {
  std::string out;
  std::size_t i = 0;
  while (i < block.size()) {
    if (block[i] == '[') {
      const auto close = block.find(']', i);
      if (close != std::string_view::npos) {
        const auto marker = block.substr(i, close - i + 1);
        if (marker == kLabelSlot) {
          if (!label) throw Error(ErrorCode::kTemplate, "label slot unfilled");
          out += *label;
          i = close + 1;
          continue;
        }
        bool matched = false;
        for (const auto& name : t.field_names) {
          if (marker == slot_marker(name)) {
            auto it = e.fields.find(name);
            if (it == e.fields.end()) {
              throw Error(ErrorCode::kTemplate,
                          "slot " + std::string(marker) + " unfilled");
            }
            out += it->second;
            matched = true;
            break;
          }
        }
        if (matched) {
          i = close + 1;
          continue;
        }
      }
    }
    out += block[i++];
  }
  return out;
}

}  // namespace

const char* to_string(TemplateFamily family) {
  switch (family) {
    case TemplateFamily::kSingleInput: return "single-input";
    case TemplateFamily::kNliPair: return "nli-pair";
    case TemplateFamily::kCustom: return "custom";
  }
  return "custom";
}

TemplateFamily parse_template_family(std::string_view name) {
  if (name == "single-input") return TemplateFamily::kSingleInput;
  if (name == "nli-pair") return TemplateFamily::kNliPair;
  if (name == "custom") return TemplateFamily::kCustom;
  throw Error(ErrorCode::kTemplate,
              "unknown template family '" + std::string(name) + "'");
}

std::string slot_marker(std::string_view field_name) {
  std::string marker = "[";
  for (char c : field_name) {
    marker += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }
  marker += ']';
  return marker;
}

void PromptTemplate::finalize() {
  if (query_block.empty()) {
    std::string_view block = example_block;
    if (block.size() < kLabelSlot.size() ||
        block.substr(block.size() - kLabelSlot.size()) != kLabelSlot) {
      throw Error(ErrorCode::kTemplate,
                  "query_block omitted but example_block does not end with "
                  "[LABEL]");
    }
    query_block = std::string(block.substr(0, block.size() - kLabelSlot.size()));
  }
  if (label_prefix.empty()) {
    std::size_t after_fields = 0;
    for (const auto& name : field_names) {
      const auto marker = slot_marker(name);
      const auto pos = query_block.rfind(marker);
      if (pos != std::string::npos) {
        after_fields = std::max(after_fields, pos + marker.size());
      }
    }
    std::string_view tail = std::string_view(query_block).substr(after_fields);
    const auto nl = tail.rfind('\n');
    if (nl != std::string_view::npos) tail.remove_prefix(nl + 1);
    label_prefix = std::string(tail);
  }
  validate();
}

void PromptTemplate::validate() const {
  auto fail = [](const std::string& what) {
    throw Error(ErrorCode::kTemplate, what);
  };
  if (field_names.empty()) fail("template declares no input fields");
  switch (family) {
    case TemplateFamily::kSingleInput:
      if (field_names != std::vector<std::string>{"input"}) {
        fail("single-input templates use exactly the field 'input'");
      }
      break;
    case TemplateFamily::kNliPair:
      if (field_names != std::vector<std::string>{"premise", "hypothesis"}) {
        fail("nli-pair templates use the fields 'premise' and 'hypothesis'");
      }
      break;
    case TemplateFamily::kCustom:
      break;
  }
  for (const auto& name : field_names) {
    const auto marker = slot_marker(name);
    if (example_block.find(marker) == std::string::npos) {
      fail("example_block lacks slot " + marker);
    }
    if (query_block.find(marker) == std::string::npos) {
      fail("query_block lacks slot " + marker);
    }
  }
  if (count_occurrences(example_block, kLabelSlot) != 1) {
    fail("example_block must contain exactly one [LABEL] slot");
  }
  if (query_block.find(kLabelSlot) != std::string::npos) {
    fail("query_block must not contain [LABEL]");
  }
  if (query_block.size() < label_prefix.size() ||
      query_block.compare(query_block.size() - label_prefix.size(),
                          label_prefix.size(), label_prefix) != 0) {
    fail("query_block must end with label_prefix");
  }
  if (separator.empty()) fail("separator must be nonempty");
}

PromptTemplate make_template(TemplateFamily family, std::string example_block,
                             std::vector<std::string> field_names,
                             std::string separator, std::string instruction,
                             std::string query_block, std::string label_prefix) {
  PromptTemplate t;
  t.family = family;
  t.example_block = std::move(example_block);
  t.field_names = std::move(field_names);
  t.separator = std::move(separator);
  t.instruction = std::move(instruction);
  t.query_block = std::move(query_block);
  t.label_prefix = std::move(label_prefix);
  t.finalize();
  return t;
}

std::string label_continuation(const PromptTemplate& t, std::string_view label) {
  if (t.label_prefix.empty() || ends_with_space(t.label_prefix)) {
    return std::string(label);
  }
  return " " + std::string(label);
}

RenderedPrompt render_with_context(const PromptTemplate& t,
                                   const DemoSet& demos,
                                   std::span<const std::size_t> context,
                                   const Example& query, const LabelSpace& ls) {
  std::vector<std::string> blocks;
  blocks.reserve(context.size() + 2);
  if (!t.instruction.empty()) {
    blocks.push_back(
        replace_all(t.instruction, kLabelSpaceSlot, join(ls.labels(), ", ")));
  }
  RenderedPrompt out;
  for (std::size_t idx : context) {
    if (idx >= demos.k()) {
      throw Error(ErrorCode::kIndex, "demo index out of range");
    }
    const Example& demo = demos.demos[idx];
    if (demo.gold_label >= ls.size()) {
      throw Error(ErrorCode::kTemplate, "demo label index out of range");
    }
    // The label replaces [LABEL] directly after label_prefix in the block.
    blocks.push_back(fill_block(t, t.example_block, demo,
                                label_continuation(t, ls[demo.gold_label])));
    out.demo_indices.push_back(idx);
  }
  blocks.push_back(fill_block(t, t.query_block, query, std::nullopt));
  out.text = join(blocks, t.separator);
  return out;
}

RenderedPrompt render_icl_prompt(const PromptTemplate& t, const DemoSet& demos,
                                 const Example& query, const LabelSpace& ls) {
  std::vector<std::size_t> all(demos.k());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return render_with_context(t, demos, all, query, ls);
}

RenderedPrompt render_leave_one_out(const PromptTemplate& t,
                                    const DemoSet& demos, std::size_t held_out,
                                    bool shuffled, SeededRng& rng,
                                    const LabelSpace& ls) {
  if (held_out >= demos.k()) {
    throw Error(ErrorCode::kIndex, "held_out index " + std::to_string(held_out) +
                                       " out of range for K=" +
                                       std::to_string(demos.k()));
  }
  std::vector<std::size_t> context;
  context.reserve(demos.k() - 1);
  for (std::size_t j = 0; j < demos.k(); ++j) {
    if (j != held_out) context.push_back(j);
  }
  const Example& x = demos.demos[held_out];
  if (!shuffled) return render_with_context(t, demos, context, x, ls);
  return render_with_context(t, demos, context, shuffle_example(x, rng), ls);
}

std::string shuffle_words(std::string_view text, SeededRng& rng) {
  auto words = split_words(text);
  fisher_yates(words, rng);
  return join(words, " ");
}

Example shuffle_example(const Example& e, SeededRng& rng) {
  Example out = e;
  for (auto& [name, text] : out.fields) text = shuffle_words(text, rng);
  return out;
}

}  // namespace icc
