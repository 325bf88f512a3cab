#include "barm/rng.hpp"

#include "barm/errors.hpp"

#include <limits>
#include <sstream>

namespace barm {

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
    if (hi < lo) {
        throw InvalidInput("uniform_int: empty range");
    }
    const auto range = static_cast<std::uint64_t>(hi - lo) + 1;
    if (range == 0) {
        return static_cast<std::int64_t>(engine_());
    }
    const std::uint64_t limit =
        std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % range;
    std::uint64_t v = engine_();
    while (v >= limit) {
        v = engine_();
    }
    return lo + static_cast<std::int64_t>(v % range);
}

std::string Rng::serialize() const {
    std::ostringstream os;
    os << engine_;
    return os.str();
}

Rng Rng::deserialize(const std::string& state) {
    Rng r;
    std::istringstream is(state);
    is >> r.engine_;
    if (!is) {
        throw InvalidInput("malformed generator state");
    }
    return r;
}

}  // namespace barm
