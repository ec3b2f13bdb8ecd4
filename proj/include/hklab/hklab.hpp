#pragma once

#include "hklab/error.hpp"
#include "hklab/measures.hpp"
#include "hklab/entropy.hpp"
#include "hklab/metrics.hpp"
#include "hklab/dissipation.hpp"
#include "hklab/flows.hpp"
#include "hklab/inequalities.hpp"
#include "hklab/shapemass.hpp"
#include "hklab/io.hpp"
