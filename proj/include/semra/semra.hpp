#pragma once

#include "semra/channel.hpp"
#include "semra/corpus.hpp"
#include "semra/error.hpp"
#include "semra/generators.hpp"
#include "semra/losses.hpp"
#include "semra/metrics.hpp"
#include "semra/optimizer.hpp"
#include "semra/pipeline.hpp"
#include "semra/problem.hpp"
#include "semra/qp.hpp"
#include "semra/rng.hpp"
#include "semra/synthetic.hpp"
#include "semra/verify.hpp"
