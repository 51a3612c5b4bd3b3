#pragma once

#include "kmdeblur/config.hpp"
#include "kmdeblur/fft.hpp"
#include "kmdeblur/image.hpp"
#include "kmdeblur/io.hpp"
#include "kmdeblur/kernel.hpp"
#include "kmdeblur/metrics.hpp"
#include "kmdeblur/optimizer.hpp"
#include "kmdeblur/pipeline.hpp"
#include "kmdeblur/synth.hpp"
