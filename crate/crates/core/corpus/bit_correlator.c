// SPDX-License-Identifier: Apache-2.0
// Number of bits of each input byte that agree with a mask.
void bit_correlator(uint8_t in[32], uint8_t mask, uint4_t count[32]) {
  for (int i = 0; i < 32; i++) {
    uint8_t same = ~(in[i] ^ mask);
    uint4_t c = 0;
    for (int b = 0; b < 8; b++) {
      c = c + ((same >> b) & 1);
    }
    count[i] = c;
  }
}
