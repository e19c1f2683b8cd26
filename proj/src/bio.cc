#include "tev/bio.h"

#include <algorithm>

#include "tev/errors.h"

namespace tev {

namespace {

constexpr std::array<std::string_view, kNumSlotTypes> kSlotNames = {
    "when", "where", "what", "consequence"};

}  // namespace

std::string_view slot_type_name(SlotType type) {
  return kSlotNames[static_cast<int>(type)];
}

std::optional<SlotType> parse_slot_type(std::string_view name) {
  for (int i = 0; i < kNumSlotTypes; ++i) {
    if (kSlotNames[i] == name) return static_cast<SlotType>(i);
  }
  return std::nullopt;
}

std::string_view class_label_name(ClassLabel label) {
  return label == ClassLabel::kTraffic ? "traffic" : "non_traffic";
}

std::optional<ClassLabel> parse_class_label(std::string_view name) {
  if (name == "traffic") return ClassLabel::kTraffic;
  if (name == "non_traffic") return ClassLabel::kNonTraffic;
  return std::nullopt;
}

std::string to_string(const SlotSpan &span) {
  return std::string(slot_type_name(span.type)) + "(" +
         std::to_string(span.start) + "," + std::to_string(span.end) + ")";
}

int tag_index(const BioTag &tag) {
  if (tag.kind == BioTag::Kind::kOutside) return 0;
  const int base = 1 + 2 * static_cast<int>(*tag.slot_type);
  return tag.kind == BioTag::Kind::kBegin ? base : base + 1;
}

BioTag tag_from_index(int index) {
  if (index < 0 || index >= kNumTags) {
    throw std::out_of_range("tag index " + std::to_string(index));
  }
  if (index == 0) return BioTag::outside();
  const auto type = static_cast<SlotType>((index - 1) / 2);
  return (index - 1) % 2 == 0 ? BioTag::begin(type) : BioTag::inside(type);
}

std::string tag_name(const BioTag &tag) {
  switch (tag.kind) {
    case BioTag::Kind::kOutside:
      return "O";
    case BioTag::Kind::kBegin:
      return "B-" + std::string(slot_type_name(*tag.slot_type));
    case BioTag::Kind::kInside:
      return "I-" + std::string(slot_type_name(*tag.slot_type));
  }
  return "O";
}

std::optional<BioTag> parse_tag(std::string_view name) {
  if (name == "O") return BioTag::outside();
  if (name.size() < 3 || name[1] != '-') return std::nullopt;
  auto type = parse_slot_type(name.substr(2));
  if (!type) return std::nullopt;
  if (name[0] == 'B') return BioTag::begin(*type);
  if (name[0] == 'I') return BioTag::inside(*type);
  return std::nullopt;
}

std::vector<std::string> tag_inventory() {
  std::vector<std::string> names;
  for (int i = 0; i < kNumTags; ++i) names.push_back(tag_name(tag_from_index(i)));
  return names;
}

bool transition_allowed(const std::optional<BioTag> &prev,
                        const BioTag &next) {
  if (next.kind != BioTag::Kind::kInside) return true;
  return prev && prev->kind != BioTag::Kind::kOutside &&
         prev->slot_type == next.slot_type;
}

void check_spans(int token_count, const std::vector<SlotSpan> &spans) {
  std::vector<SlotSpan> sorted = spans;
  std::sort(sorted.begin(), sorted.end(),
            [](const SlotSpan &a, const SlotSpan &b) {
              return a.start < b.start;
            });
  int covered_to = 0;
  for (const SlotSpan &s : sorted) {
    if (s.start < 0 || s.start >= s.end || s.end > token_count) {
      throw DataError("span " + to_string(s) + " out of bounds for " +
                      std::to_string(token_count) + " tokens");
    }
    if (s.start < covered_to) {
      throw DataError("overlapping span " + to_string(s));
    }
    covered_to = s.end;
  }
}

TagSequence encode_spans(int token_count, const std::vector<SlotSpan> &spans) {
  check_spans(token_count, spans);
  TagSequence tags(token_count);
  for (const SlotSpan &s : spans) {
    tags[s.start] = BioTag::begin(s.type);
    for (int i = s.start + 1; i < s.end; ++i) tags[i] = BioTag::inside(s.type);
  }
  return tags;
}

std::vector<SlotSpan> decode_tags(const TagSequence &tags) {
  std::vector<SlotSpan> spans;
  std::optional<SlotSpan> open;
  const int n = static_cast<int>(tags.size());
  for (int i = 0; i < n; ++i) {
    const BioTag &tag = tags[i];
    const bool continues = tag.kind == BioTag::Kind::kInside && open &&
                           open->type == *tag.slot_type;
    if (continues) {
      open->end = i + 1;
      continue;
    }
    if (open) spans.push_back(*open);
    open.reset();
    if (tag.kind != BioTag::Kind::kOutside) {
      open = SlotSpan{*tag.slot_type, i, i + 1};
    }
  }
  if (open) spans.push_back(*open);
  return spans;
}

std::string_view violation_name(Violation::Kind kind) {
  return kind == Violation::Kind::kStrayInside ? "stray-I" : "type-mismatch-I";
}

std::vector<Violation> validate(const TagSequence &tags) {
  std::vector<Violation> out;
  for (size_t i = 0; i < tags.size(); ++i) {
    if (tags[i].kind != BioTag::Kind::kInside) continue;
    const bool has_prev =
        i > 0 && tags[i - 1].kind != BioTag::Kind::kOutside;
    if (!has_prev) {
      out.push_back({static_cast<int>(i), Violation::Kind::kStrayInside});
    } else if (tags[i - 1].slot_type != tags[i].slot_type) {
      out.push_back({static_cast<int>(i), Violation::Kind::kTypeMismatchInside});
    }
  }
  return out;
}

TagSequence repair(const TagSequence &tags) {
  TagSequence out = tags;
  for (const Violation &v : validate(tags)) {
    out[v.index].kind = BioTag::Kind::kBegin;
  }
  return out;
}

}  // namespace tev
