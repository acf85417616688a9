#pragma once

#include "sase/common.hpp"
#include "sase/random.hpp"
#include "sase/linalg.hpp"
#include "sase/channel_model.hpp"
#include "sase/sounding.hpp"
#include "sase/subspace.hpp"
#include "sase/reconstruct.hpp"
#include "sase/metrics.hpp"
#include "sase/harness.hpp"
#include "sase/config.hpp"
#include "sase/serialize.hpp"
