#pragma once

#define GRPCA_VERSION_MAJOR 0
#define GRPCA_VERSION_MINOR 1
#define GRPCA_VERSION_PATCH 0

namespace grpca {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace grpca
