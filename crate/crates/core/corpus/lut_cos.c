// SPDX-License-Identifier: Apache-2.0
// Builtin cosine table, 10-bit phase to 16-bit amplitude.
void lut_cos(uint10_t X[16], int16_t Y[16]) {
  for (int i = 0; i < 16; i++) {
    Y[i] = lut("cos", X[i]);
  }
}
