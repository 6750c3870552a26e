#pragma once

#include "mnci/adam.hpp"
#include "mnci/aggregator.hpp"
#include "mnci/classify.hpp"
#include "mnci/common.hpp"
#include "mnci/encoders.hpp"
#include "mnci/graph.hpp"
#include "mnci/influence.hpp"
#include "mnci/io.hpp"
#include "mnci/loss.hpp"
#include "mnci/sampler.hpp"
#include "mnci/synth.hpp"
#include "mnci/trainer.hpp"
