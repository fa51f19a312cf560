#pragma once

#include "manar/arproc.hpp"
#include "manar/errors.hpp"
#include "manar/manifolds.hpp"
#include "manar/matcore.hpp"
#include "manar/random.hpp"
#include "manar/serialize.hpp"
#include "manar/sysid.hpp"
#include "manar/xharness.hpp"
