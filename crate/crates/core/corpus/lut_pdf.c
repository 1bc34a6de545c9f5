// SPDX-License-Identifier: Apache-2.0
// User table bound to an initialization file, 10-bit index, 16-bit data.
void lut_pdf(uint10_t X[16], int16_t Y[16]) {
  for (int i = 0; i < 16; i++) {
    Y[i] = lut("pdf", X[i]);
  }
}
