#pragma once

#include "s0l/grammar.hpp"
#include "s0l/metrics.hpp"
#include "s0l/procgen.hpp"
#include "s0l/scanner.hpp"
#include "s0l/search.hpp"
#include "s0l/text_format.hpp"
