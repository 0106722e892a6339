#pragma once

// Umbrella header.

#include "space/bench.hpp"
#include "space/checkpoint.hpp"
#include "space/corpus.hpp"
#include "space/decoder.hpp"
#include "space/errors.hpp"
#include "space/gradcheck.hpp"
#include "space/layout.hpp"
#include "space/mask.hpp"
#include "space/matrix.hpp"
#include "space/model.hpp"
#include "space/oracle.hpp"
#include "space/rng.hpp"
#include "space/sampling.hpp"
#include "space/sarsft.hpp"
#include "space/tape.hpp"
