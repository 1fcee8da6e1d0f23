#pragma once

#include "evmguard/bounds.hpp"
#include "evmguard/bundle.hpp"
#include "evmguard/cfg.hpp"
#include "evmguard/concrete.hpp"
#include "evmguard/deps.hpp"
#include "evmguard/detect.hpp"
#include "evmguard/errors.hpp"
#include "evmguard/opcode.hpp"
#include "evmguard/patch.hpp"
#include "evmguard/pipeline.hpp"
#include "evmguard/program.hpp"
#include "evmguard/replay.hpp"
#include "evmguard/safemath.hpp"
#include "evmguard/symbolic.hpp"
#include "evmguard/traces.hpp"
#include "evmguard/word.hpp"
