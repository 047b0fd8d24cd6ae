#include "safe_explore/state_set.hpp"

namespace safe_explore {

StateSet::StateSet(std::size_t universe, std::initializer_list<StateId> members)
    : bits_(universe) {
  for (StateId s : members) insert(s);
}

StateSet StateSet::full(std::size_t universe) {
  StateSet out(universe);
  out.bits_.set();
  return out;
}

StateId StateSet::first() const noexcept {
  auto i = bits_.find_first();
  return i == boost::dynamic_bitset<>::npos ? -1 : static_cast<StateId>(i);
}

std::vector<StateId> StateSet::members() const {
  std::vector<StateId> out;
  out.reserve(count());
  for_each([&](StateId s) { out.push_back(s); });
  return out;
}

}  // namespace safe_explore
