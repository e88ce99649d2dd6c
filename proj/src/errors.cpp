#include "plap/errors.hpp"

namespace plap {

void require(bool cond, const std::string& msg) {
    if (!cond) throw DomainError(msg);
}

}  // namespace plap
