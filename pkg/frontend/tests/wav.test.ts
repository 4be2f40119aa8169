import { describe, expect, it } from 'vitest'

import {
  TARGET_SAMPLE_RATE,
  encodeWav,
  mixToMono,
  parseWavHeader,
  resample,
  timestampedWavName,
} from '../src/wav'

function sine(freq: number, seconds: number, rate: number): Float32Array {
  const out = new Float32Array(Math.round(seconds * rate))
  for (let i = 0; i < out.length; i++) out[i] = 0.5 * Math.sin((2 * Math.PI * freq * i) / rate)
  return out
}

describe('encodeWav', () => {
  it('meets the service contract: 16 kHz mono PCM-16', async () => {
    const blob = encodeWav([sine(440, 0.5, 48000)], 48000)
    expect(blob.type).toBe('audio/wav')
    const info = parseWavHeader(await blob.arrayBuffer())
    expect(info.sampleRate).toBe(TARGET_SAMPLE_RATE)
    expect(info.channels).toBe(1)
    expect(info.bitsPerSample).toBe(16)
    expect(info.frames / info.sampleRate).toBeCloseTo(0.5, 2)
  })

  it('mixes stereo down to mono', async () => {
    const left = sine(440, 0.2, 16000)
    const right = sine(880, 0.2, 16000)
    const info = parseWavHeader(await encodeWav([left, right], 16000).arrayBuffer())
    expect(info.channels).toBe(1)
    expect(info.frames).toBe(left.length)
  })

  it('passes 16 kHz input through without resampling', async () => {
    const samples = sine(440, 0.25, 16000)
    const info = parseWavHeader(await encodeWav([samples], 16000).arrayBuffer())
    expect(info.frames).toBe(samples.length)
  })

  it('clamps out-of-range samples instead of wrapping', async () => {
    const loud = new Float32Array([2.0, -2.0, 0.0])
    const buffer = await encodeWav([loud], 16000).arrayBuffer()
    const view = new DataView(buffer)
    expect(view.getInt16(44, true)).toBe(0x7fff)
    expect(view.getInt16(46, true)).toBe(-0x8000)
    expect(view.getInt16(48, true)).toBe(0)
  })
})

describe('resample', () => {
  it('halves the sample count from 32 kHz to 16 kHz', () => {
    const out = resample(sine(100, 1.0, 32000), 32000, 16000)
    expect(out.length).toBe(16000)
  })

  it('identity when rates match', () => {
    const samples = sine(100, 0.1, 16000)
    expect(resample(samples, 16000, 16000)).toBe(samples)
  })

  it('preserves a constant signal', () => {
    const flat = new Float32Array(4410).fill(0.25)
    const out = resample(flat, 44100, 16000)
    for (const v of out) expect(v).toBeCloseTo(0.25, 6)
  })
})

describe('mixToMono', () => {
  it('averages channels', () => {
    const a = new Float32Array([1, 0, -1])
    const b = new Float32Array([0, 0, 1])
    expect(Array.from(mixToMono([a, b]))).toEqual([0.5, 0, 0])
  })
})

describe('timestampedWavName', () => {
  it('encodes the timestamp and extension', () => {
    const name = timestampedWavName(new Date(2024, 5, 7, 9, 30, 5))
    expect(name).toBe('recording-20240607-093005.wav')
  })
})

describe('parseWavHeader', () => {
  it('rejects non-WAV data', () => {
    expect(() => parseWavHeader(new ArrayBuffer(64))).toThrow()
  })
})
