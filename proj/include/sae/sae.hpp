#pragma once

#include "sae/acquisition.hpp"
#include "sae/checkpoint.hpp"
#include "sae/datapool.hpp"
#include "sae/errors.hpp"
#include "sae/evidence.hpp"
#include "sae/experiment.hpp"
#include "sae/metrics.hpp"
#include "sae/numerics.hpp"
#include "sae/probe.hpp"
#include "sae/seh.hpp"
