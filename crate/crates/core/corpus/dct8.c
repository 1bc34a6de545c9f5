// SPDX-License-Identifier: Apache-2.0
// One-dimensional 8-point integer DCT with a fixed coefficient table.
const int8_t COEF[8][8] = {
  {45, 45, 45, 45, 45, 45, 45, 45},
  {63, 53, 36, 12, -12, -36, -53, -63},
  {59, 24, -24, -59, -59, -24, 24, 59},
  {53, -12, -63, -36, 36, 63, 12, -53},
  {45, -45, -45, 45, 45, -45, -45, 45},
  {36, -63, 12, 53, -53, -12, 63, -36},
  {24, -59, 59, -24, -24, 59, -59, 24},
  {12, -36, 53, -63, 63, -53, 36, -12}
};

void dct8(int8_t x[8], int32_t y[8]) {
  for (int k = 0; k < 8; k++) {
    int32_t s = 0;
    for (int n = 0; n < 8; n++) {
      s = s + COEF[k][n] * x[n];
    }
    y[k] = s;
  }
}
