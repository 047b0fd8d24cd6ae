#include "safe_explore/grid.hpp"

#include <cmath>
#include <cstdlib>
#include <string>

#include "safe_explore/error.hpp"

namespace safe_explore {

namespace {

struct Offset {
  int dr;
  int dc;
};

constexpr Offset offset(Action a) noexcept {
  switch (a) {
    case Action::stay: return {0, 0};
    case Action::up: return {-1, 0};
    case Action::down: return {1, 0};
    case Action::left: return {0, -1};
    case Action::right: return {0, 1};
  }
  return {0, 0};
}

}  // namespace

std::string_view to_string(Action a) noexcept {
  switch (a) {
    case Action::stay: return "stay";
    case Action::up: return "up";
    case Action::down: return "down";
    case Action::left: return "left";
    case Action::right: return "right";
  }
  return "?";
}

int manhattan_distance(const GridShape& g, StateId a, StateId b) noexcept {
  return std::abs(g.row(a) - g.row(b)) + std::abs(g.col(a) - g.col(b));
}

double euclidean_distance(const GridShape& g, StateId a, StateId b) noexcept {
  const double dr = g.row(a) - g.row(b);
  const double dc = g.col(a) - g.col(b);
  return std::sqrt(dr * dr + dc * dc);
}

bool is_available(const GridShape& g, StateId s, Action a) noexcept {
  const auto [dr, dc] = offset(a);
  return g.contains(g.row(s) + dr, g.col(s) + dc);
}

std::vector<Action> available_actions(const GridShape& g, StateId s) {
  std::vector<Action> out;
  for (Action a : kAllActions)
    if (is_available(g, s, a)) out.push_back(a);
  return out;
}

StateId transition(const GridShape& g, StateId s, Action a) {
  if (!g.valid(s))
    throw Error(ErrorCode::invalid_parameter, "state " + std::to_string(s) + " is outside the grid");
  if (!is_available(g, s, a))
    throw Error(ErrorCode::invalid_action, "action '" + std::string(to_string(a)) +
                                               "' leaves the grid from state " + std::to_string(s));
  const auto [dr, dc] = offset(a);
  return g.index(g.row(s) + dr, g.col(s) + dc);
}

}  // namespace safe_explore
