#pragma once

// Umbrella header for the sandboxed reward expression language.

#include "autocoach/reward/ast.hpp"
#include "autocoach/reward/eval.hpp"
#include "autocoach/reward/fingerprint.hpp"
#include "autocoach/reward/lint.hpp"
#include "autocoach/reward/parse.hpp"
#include "autocoach/reward/vars.hpp"
