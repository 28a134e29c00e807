// magnonics.hpp — umbrella header for the cavity-magnon polariton toolkit.

#pragma once

#include "magnonics/constants.hpp"
#include "magnonics/derived.hpp"
#include "magnonics/eigen.hpp"
#include "magnonics/fitting.hpp"
#include "magnonics/io.hpp"
#include "magnonics/model.hpp"
#include "magnonics/peaks.hpp"
#include "magnonics/spectrum.hpp"
#include "magnonics/transmission.hpp"
