#pragma once

#include "pvids/ids/model.hpp"
