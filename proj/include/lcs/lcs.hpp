#pragma once

#include "lcs/agglomerate.hpp"
#include "lcs/array2d.hpp"
#include "lcs/causal_states.hpp"
#include "lcs/chi_square.hpp"
#include "lcs/config.hpp"
#include "lcs/dynamics.hpp"
#include "lcs/errors.hpp"
#include "lcs/io.hpp"
#include "lcs/kmeans.hpp"
#include "lcs/lattice.hpp"
#include "lcs/lightcone.hpp"
#include "lcs/metrics.hpp"
#include "lcs/parallel.hpp"
#include "lcs/pipeline.hpp"
#include "lcs/random.hpp"
#include "lcs/render.hpp"
