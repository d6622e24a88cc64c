#ifndef KGESYM_KGESYM_HPP
#define KGESYM_KGESYM_HPP

#include "kgesym/checkpoint.hpp"
#include "kgesym/common.hpp"
#include "kgesym/data.hpp"
#include "kgesym/eval.hpp"
#include "kgesym/model.hpp"
#include "kgesym/report.hpp"
#include "kgesym/rng.hpp"
#include "kgesym/train.hpp"

namespace kgesym {
inline constexpr const char* kVersion = "0.1.0";
}

#endif
