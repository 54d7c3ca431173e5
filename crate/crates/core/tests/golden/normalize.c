#include <inttypes.h>
#include <stdio.h>
#include "normalize.h"

int32_t limb_of(int32_t x) {
  return x;
}

int32_t land(int32_t p_a, int32_t p_b) {
  return (p_a & p_b);
}

int32_t lsub(int32_t p_a, int32_t p_b) {
  return (int32_t)((uint32_t)p_a - (uint32_t)p_b);
}

int32_t eq_mask(int32_t p_a, int32_t p_b) {
  return (int32_t)((uint32_t)0 - (uint32_t)(int32_t)(p_a == p_b));
}

int32_t gte_mask(int32_t p_a, int32_t p_b) {
  return (int32_t)((uint32_t)(int32_t)(p_a < p_b) - (uint32_t)1);
}

void normalize(int32_t* b) {
  int32_t ones = limb_of(67108863);
  int32_t m5 = limb_of(67108859);
  KRML_ANNOT_READ((b + 0));
  int32_t b0 = b[0];
  KRML_ANNOT_READ((b + 1));
  int32_t b1 = b[1];
  KRML_ANNOT_READ((b + 2));
  int32_t b2 = b[2];
  KRML_ANNOT_READ((b + 3));
  int32_t b3 = b[3];
  KRML_ANNOT_READ((b + 4));
  int32_t b4 = b[4];
  int32_t e4 = eq_mask(b4, ones);
  int32_t e3 = eq_mask(b3, ones);
  int32_t e2 = eq_mask(b2, ones);
  int32_t e1 = eq_mask(b1, ones);
  int32_t g0 = gte_mask(b0, m5);
  int32_t t0 = land(e4, e3);
  int32_t t1 = land(t0, e2);
  int32_t t2 = land(t1, e1);
  int32_t m = land(t2, g0);
  int32_t d0 = land(m, m5);
  int32_t d = land(m, ones);
  int32_t n0 = lsub(b0, d0);
  int32_t n1 = lsub(b1, d);
  int32_t n2 = lsub(b2, d);
  int32_t n3 = lsub(b3, d);
  int32_t n4 = lsub(b4, d);
  KRML_ANNOT_WRITE((b + 0));
  b[0] = n0;
  KRML_ANNOT_WRITE((b + 1));
  b[1] = n1;
  KRML_ANNOT_WRITE((b + 2));
  b[2] = n2;
  KRML_ANNOT_WRITE((b + 3));
  b[3] = n3;
  KRML_ANNOT_WRITE((b + 4));
  b[4] = n4;
  return;
}

int main(void) {
  int32_t _s0 = get_s0();
  int32_t _s1 = get_s1();
  int32_t _s2 = get_s2();
  int32_t _s3 = get_s3();
  int32_t _s4 = get_s4();
  int32_t b[5];
  for (uint32_t _i = 0; _i < 5U; _i++) {
    KRML_ANNOT_WRITE(b + _i);
    b[_i] = _s0;
  }
  KRML_ANNOT_WRITE((b + 1));
  b[1] = _s1;
  KRML_ANNOT_WRITE((b + 2));
  b[2] = _s2;
  KRML_ANNOT_WRITE((b + 3));
  b[3] = _s3;
  KRML_ANNOT_WRITE((b + 4));
  b[4] = _s4;
  normalize(b);
  KRML_ANNOT_READ((b + 0));
  int32_t r = b[0];
  printf("%" PRId32 "\n", (int32_t)r);
  return 0;
}
