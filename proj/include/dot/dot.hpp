#pragma once
// Convenience header pulling in the whole library.

#include "dot/backend.hpp"
#include "dot/casedb.hpp"
#include "dot/core.hpp"
#include "dot/engine.hpp"
#include "dot/errors.hpp"
#include "dot/evalkit.hpp"
#include "dot/pipeline.hpp"
#include "dot/promptkit.hpp"
