#ifndef KREMLITE_NORMALIZE_H
#define KREMLITE_NORMALIZE_H

#include <stdint.h>
#include "kremlite_annot.h"

int32_t limb_of(int32_t x);
int32_t land(int32_t p_a, int32_t p_b);
int32_t lsub(int32_t p_a, int32_t p_b);
int32_t eq_mask(int32_t p_a, int32_t p_b);
int32_t gte_mask(int32_t p_a, int32_t p_b);
void normalize(int32_t* b);
extern int32_t get_s0(void);
extern int32_t get_s1(void);
extern int32_t get_s2(void);
extern int32_t get_s3(void);
extern int32_t get_s4(void);

#endif
