#pragma once

// Umbrella header for the DICA library.

#include "dica/common.hpp"
#include "dica/dataset.hpp"
#include "dica/kernels.hpp"
#include "dica/domains.hpp"
#include "dica/linalg.hpp"
#include "dica/transform.hpp"
#include "dica/downstream.hpp"
#include "dica/synth.hpp"
#include "dica/io.hpp"
