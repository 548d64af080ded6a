#pragma once

#include <string>

#include "ood/network.hpp"

namespace ood {

// Self-describing binary container: layer descriptors, input shape and all
// parameter arrays. Round-trips bit-exactly (doubles are stored verbatim).
void save_checkpoint(const Network& net, const std::string& path);
Network load_checkpoint(const std::string& path);

}  // namespace ood
