#pragma once

#include <string_view>

namespace navsim {

/// Behavior label carried in the vehicle state; transitions are owned by the
/// road-network finite state machine.
enum class BehaviorLabel {
  driving_straight,
  turning_left,
  turning_right,
  merging_left,
  merging_right,
  stopped_waiting,
};

std::string_view to_string(BehaviorLabel b);

inline bool is_turning(BehaviorLabel b) {
  return b == BehaviorLabel::turning_left || b == BehaviorLabel::turning_right;
}

inline bool is_merging(BehaviorLabel b) {
  return b == BehaviorLabel::merging_left || b == BehaviorLabel::merging_right;
}

}  // namespace navsim
