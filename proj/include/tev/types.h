#ifndef TEV_TYPES_H_
#define TEV_TYPES_H_

#include <array>
#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace tev {

enum class SlotType { kWhen = 0, kWhere = 1, kWhat = 2, kConsequence = 3 };

inline constexpr int kNumSlotTypes = 4;
inline constexpr std::array<SlotType, kNumSlotTypes> kAllSlotTypes = {
    SlotType::kWhen, SlotType::kWhere, SlotType::kWhat,
    SlotType::kConsequence};

std::string_view slot_type_name(SlotType type);
std::optional<SlotType> parse_slot_type(std::string_view name);

enum class ClassLabel { kTraffic = 0, kNonTraffic = 1 };

inline constexpr int kNumClasses = 2;

std::string_view class_label_name(ClassLabel label);
std::optional<ClassLabel> parse_class_label(std::string_view name);

// Typed token span [start, end).
struct SlotSpan {
  SlotType type = SlotType::kWhen;
  int start = 0;
  int end = 0;

  int length() const { return end - start; }
  friend auto operator<=>(const SlotSpan &, const SlotSpan &) = default;
};

std::string to_string(const SlotSpan &span);

}  // namespace tev

#endif  // TEV_TYPES_H_
