#ifndef KREMLITE_STRUCTERASE_H
#define KREMLITE_STRUCTERASE_H

#include <stdint.h>
#include "kremlite_annot.h"

extern const int32_t iterations;
void f(int32_t p_r_left, int32_t p_r_right, int32_t p_n);

#endif
