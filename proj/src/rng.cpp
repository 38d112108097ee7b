#include "wdt/rng.hpp"

#include <sstream>

namespace wdt {

std::string Rng::save_state() const {
    std::ostringstream os;
    os << seed_ << ' ' << engine_ << ' ' << (has_cached_ ? 1 : 0);
    if (has_cached_) {
        os << ' ';
        os.precision(17);
        os << std::hexfloat << cached_;
    }
    return os.str();
}

void Rng::load_state(const std::string& s) {
    std::istringstream is(s);
    int flag = 0;
    is >> seed_ >> engine_ >> flag;
    has_cached_ = flag != 0;
    if (has_cached_) is >> std::hexfloat >> cached_;
}

}  // namespace wdt
