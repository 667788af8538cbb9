#pragma once

#include "laeisac/agent.hpp"
#include "laeisac/channel.hpp"
#include "laeisac/checkpoint.hpp"
#include "laeisac/config.hpp"
#include "laeisac/cxla.hpp"
#include "laeisac/env.hpp"
#include "laeisac/experiment.hpp"
#include "laeisac/nn.hpp"
#include "laeisac/replay.hpp"
#include "laeisac/report.hpp"
#include "laeisac/rng.hpp"
#include "laeisac/signal.hpp"
#include "laeisac/world.hpp"
