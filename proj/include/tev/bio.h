#ifndef TEV_BIO_H_
#define TEV_BIO_H_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tev/types.h"

namespace tev {

// One BIO tag. slot_type is set iff kind != kOutside.
struct BioTag {
  enum class Kind { kOutside, kBegin, kInside };

  Kind kind = Kind::kOutside;
  std::optional<SlotType> slot_type;

  static BioTag outside() { return {}; }
  static BioTag begin(SlotType t) { return {Kind::kBegin, t}; }
  static BioTag inside(SlotType t) { return {Kind::kInside, t}; }

  bool operator==(const BioTag &) const = default;
};

using TagSequence = std::vector<BioTag>;

// The tag inventory in its fixed order: O, then B-/I- for when, where,
// what, consequence. Model outputs and checkpoints use this order.
inline constexpr int kNumTags = 1 + 2 * kNumSlotTypes;

int tag_index(const BioTag &tag);
BioTag tag_from_index(int index);
std::string tag_name(const BioTag &tag);
std::optional<BioTag> parse_tag(std::string_view name);
std::vector<std::string> tag_inventory();

// True when `next` may legally follow `prev` (std::nullopt = sequence start).
bool transition_allowed(const std::optional<BioTag> &prev, const BioTag &next);

// B-t at start, I-t inside each span, O elsewhere. Throws DataError on
// overlapping or out-of-bounds spans.
TagSequence encode_spans(int token_count, const std::vector<SlotSpan> &spans);

// Maximal B/I runs become spans. A stray or type-mismatched I-t opens a new
// span of type t. Output is sorted by start and never overlaps.
std::vector<SlotSpan> decode_tags(const TagSequence &tags);

struct Violation {
  enum class Kind { kStrayInside, kTypeMismatchInside };
  int index = 0;
  Kind kind = Kind::kStrayInside;

  bool operator==(const Violation &) const = default;
};

std::string_view violation_name(Violation::Kind kind);

// One violation per I-tag not preceded by B-/I- of the same type.
std::vector<Violation> validate(const TagSequence &tags);

// Rewrites every violating I-t as B-t; the result validates cleanly and
// decodes to the same spans as the input.
TagSequence repair(const TagSequence &tags);

// Checks the span-set invariants against a token count. Throws DataError.
void check_spans(int token_count, const std::vector<SlotSpan> &spans);

}  // namespace tev

#endif  // TEV_BIO_H_
