#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <vector>

#include <boost/dynamic_bitset.hpp>

namespace safe_explore {

using StateId = std::int32_t;

/// Subset of the grid's states, stored as a bitset over row-major indices.
///
/// Binary operations require both operands to share the same universe size.
class StateSet {
 public:
  StateSet() = default;
  explicit StateSet(std::size_t universe) : bits_(universe) {}
  StateSet(std::size_t universe, std::initializer_list<StateId> members);

  static StateSet full(std::size_t universe);

  std::size_t universe() const noexcept { return bits_.size(); }
  std::size_t count() const noexcept { return bits_.count(); }
  bool empty() const noexcept { return bits_.none(); }

  bool contains(StateId s) const { return bits_.test(static_cast<std::size_t>(s)); }
  void insert(StateId s) { bits_.set(static_cast<std::size_t>(s)); }
  void erase(StateId s) { bits_.reset(static_cast<std::size_t>(s)); }

  bool is_subset_of(const StateSet& other) const { return bits_.is_subset_of(other.bits_); }

  StateSet& operator&=(const StateSet& o) { bits_ &= o.bits_; return *this; }
  StateSet& operator|=(const StateSet& o) { bits_ |= o.bits_; return *this; }
  StateSet& operator-=(const StateSet& o) { bits_ -= o.bits_; return *this; }

  friend StateSet operator&(StateSet a, const StateSet& b) { return a &= b; }
  friend StateSet operator|(StateSet a, const StateSet& b) { return a |= b; }
  friend StateSet operator-(StateSet a, const StateSet& b) { return a -= b; }
  friend bool operator==(const StateSet& a, const StateSet& b) { return a.bits_ == b.bits_; }

  // Lowest member, or -1 when empty.
  StateId first() const noexcept;

  // Members in increasing order.
  std::vector<StateId> members() const;

  template <typename F>
  void for_each(F&& f) const {
    for (auto i = bits_.find_first(); i != boost::dynamic_bitset<>::npos; i = bits_.find_next(i))
      f(static_cast<StateId>(i));
  }

 private:
  boost::dynamic_bitset<> bits_;
};

}  // namespace safe_explore
