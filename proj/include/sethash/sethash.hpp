#pragma once

#include "sethash/boosting.hpp"
#include "sethash/config.hpp"
#include "sethash/core.hpp"
#include "sethash/dataset_io.hpp"
#include "sethash/error.hpp"
#include "sethash/eval.hpp"
#include "sethash/index.hpp"
#include "sethash/kernel_cache.hpp"
#include "sethash/kernels.hpp"
#include "sethash/model_io.hpp"
#include "sethash/synth.hpp"
#include "sethash/trainer.hpp"
