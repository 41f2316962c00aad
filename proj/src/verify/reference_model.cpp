#include "keyssd/reference_model.hpp"

namespace keyssd {

ReferenceModel::Outcome ReferenceModel::check(Lpn first, std::uint64_t count, AccessKey key,
                                              MultiMode mode) const {
  const std::uint64_t n = mode == MultiMode::FirstLpnOnly ? 1 : count;
  for (std::uint64_t i = 0; i < n; ++i) {
    auto it = keys_.find(first + i);
    if (it != keys_.end() && it->second != key) {
      return Outcome::Deny;
    }
  }
  return Outcome::Grant;
}

ReferenceModel::Outcome ReferenceModel::read(Lpn first, std::uint64_t count, AccessKey key,
                                             MultiMode mode) const {
  return check(first, count, key, mode);
}

ReferenceModel::Outcome ReferenceModel::write(Lpn first, std::uint64_t count, AccessKey key,
                                              MultiMode mode) {
  const Outcome o = check(first, count, key, mode);
  if (o == Outcome::Grant && !key.is_none()) {
    for (std::uint64_t i = 0; i < count; ++i) {
      keys_.try_emplace(first + i, key);
    }
  }
  return o;
}

ReferenceModel::Outcome ReferenceModel::trim(Lpn first, std::uint64_t count, AccessKey key) {
  const Outcome o = check(first, count, key, MultiMode::AllLpns);
  if (o == Outcome::Grant) {
    for (std::uint64_t i = 0; i < count; ++i) {
      keys_.erase(first + i);
    }
  }
  return o;
}

std::optional<AccessKey> ReferenceModel::key_of(Lpn lpn) const {
  if (auto it = keys_.find(lpn); it != keys_.end()) {
    return it->second;
  }
  return std::nullopt;
}

}  // namespace keyssd
