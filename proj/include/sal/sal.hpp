#pragma once

// Umbrella header for the attribute-based person search library: symbiotic
// adversarial training of a cross-modal feature-synthesis module and a
// common-space alignment module, plus dataset, metrics, and reporting tools.

#include "sal/adam.hpp"
#include "sal/checkpoint.hpp"
#include "sal/dataset.hpp"
#include "sal/losses.hpp"
#include "sal/metrics.hpp"
#include "sal/model.hpp"
#include "sal/nn.hpp"
#include "sal/report.hpp"
#include "sal/rng.hpp"
#include "sal/schema.hpp"
#include "sal/synthbench.hpp"
#include "sal/trainer.hpp"
#include "sal/util.hpp"
