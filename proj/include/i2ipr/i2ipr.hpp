#pragma once

#include "pipeline.hpp"
