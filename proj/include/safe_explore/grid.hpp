#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "safe_explore/state_set.hpp"

namespace safe_explore {

enum class Action : std::uint8_t { stay, up, down, left, right };

inline constexpr std::array<Action, 5> kAllActions = {
    Action::stay, Action::up, Action::down, Action::left, Action::right};

std::string_view to_string(Action a) noexcept;

// Row-major rectangular grid of cells. State ids are `row * cols + col`.
struct GridShape {
  int rows = 0;
  int cols = 0;

  int size() const noexcept { return rows * cols; }
  int row(StateId s) const noexcept { return s / cols; }
  int col(StateId s) const noexcept { return s % cols; }
  StateId index(int r, int c) const noexcept { return r * cols + c; }
  bool contains(int r, int c) const noexcept {
    return r >= 0 && r < rows && c >= 0 && c < cols;
  }
  bool valid(StateId s) const noexcept { return s >= 0 && s < size(); }

  friend bool operator==(const GridShape&, const GridShape&) = default;
};

// Manhattan distance in cells; used for Lipschitz propagation.
int manhattan_distance(const GridShape& g, StateId a, StateId b) noexcept;

// Euclidean distance between cell centres; used by spatial kernels.
double euclidean_distance(const GridShape& g, StateId a, StateId b) noexcept;

// Directional actions leaving the grid are not available; `stay` always is.
bool is_available(const GridShape& g, StateId s, Action a) noexcept;
std::vector<Action> available_actions(const GridShape& g, StateId s);

// Throws Error(invalid_action) for unavailable actions.
StateId transition(const GridShape& g, StateId s, Action a);

}  // namespace safe_explore
