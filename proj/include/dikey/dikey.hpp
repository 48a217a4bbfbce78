#pragma once

#include "dikey/error.hpp"
#include "dikey/linalg.hpp"
#include "dikey/spectral.hpp"
#include "dikey/entropy.hpp"
#include "dikey/random.hpp"
#include "dikey/construction.hpp"
#include "dikey/selftest.hpp"
#include "dikey/keyrate.hpp"
#include "dikey/simplex.hpp"
#include "dikey/locality.hpp"
#include "dikey/io.hpp"
#include "dikey/cli.hpp"
