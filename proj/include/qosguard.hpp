#pragma once

#include "qosguard/config.hpp"
#include "qosguard/des_engine.hpp"
#include "qosguard/errors.hpp"
#include "qosguard/experiment.hpp"
#include "qosguard/guard_allocator.hpp"
#include "qosguard/markov_analyzer.hpp"
#include "qosguard/traffic_model.hpp"
#include "qosguard/vlc_phy.hpp"
