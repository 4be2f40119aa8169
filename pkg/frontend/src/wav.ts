export const TARGET_SAMPLE_RATE = 16000

/** Average multi-channel audio down to one channel. */
export function mixToMono(channels: Float32Array[]): Float32Array {
  if (channels.length === 1) return channels[0]
  const length = channels[0].length
  const mono = new Float32Array(length)
  for (let i = 0; i < length; i++) {
    let sum = 0
    for (const ch of channels) sum += ch[i]
    mono[i] = sum / channels.length
  }
  return mono
}

/** Linear-interpolation resampling. */
export function resample(samples: Float32Array, fromRate: number, toRate: number): Float32Array {
  if (fromRate === toRate) return samples
  const outLength = Math.max(1, Math.round((samples.length * toRate) / fromRate))
  const out = new Float32Array(outLength)
  const step = fromRate / toRate
  for (let i = 0; i < outLength; i++) {
    const pos = i * step
    const left = Math.floor(pos)
    const right = Math.min(left + 1, samples.length - 1)
    const frac = pos - left
    out[i] = samples[left] * (1 - frac) + samples[right] * frac
  }
  return out
}

function floatTo16(samples: Float32Array): Int16Array {
  const out = new Int16Array(samples.length)
  for (let i = 0; i < samples.length; i++) {
    const clamped = Math.max(-1, Math.min(1, samples[i]))
    out[i] = clamped < 0 ? clamped * 0x8000 : clamped * 0x7fff
  }
  return out
}

/**
 * Encode captured audio to the service contract: WAV, PCM 16-bit, mono,
 * 16 kHz. Multi-channel input is mixed down and resampled as needed.
 */
export function encodeWav(channels: Float32Array[], inputRate: number): Blob {
  const mono = mixToMono(channels)
  const samples = floatTo16(resample(mono, inputRate, TARGET_SAMPLE_RATE))
  const buffer = new ArrayBuffer(44 + samples.length * 2)
  const view = new DataView(buffer)
  const writeStr = (off: number, str: string) => {
    for (let i = 0; i < str.length; i++) view.setUint8(off + i, str.charCodeAt(i))
  }
  writeStr(0, 'RIFF')
  view.setUint32(4, 36 + samples.length * 2, true)
  writeStr(8, 'WAVEfmt ')
  view.setUint32(16, 16, true)
  view.setUint16(20, 1, true) // PCM
  view.setUint16(22, 1, true) // mono
  view.setUint32(24, TARGET_SAMPLE_RATE, true)
  view.setUint32(28, TARGET_SAMPLE_RATE * 2, true)
  view.setUint16(32, 2, true)
  view.setUint16(34, 16, true)
  writeStr(36, 'data')
  view.setUint32(40, samples.length * 2, true)
  for (let i = 0; i < samples.length; i++) view.setInt16(44 + i * 2, samples[i], true)
  return new Blob([view], { type: 'audio/wav' })
}

export interface WavInfo {
  sampleRate: number
  channels: number
  bitsPerSample: number
  frames: number
}

/** Minimal RIFF header reader, used to verify encoder output in tests. */
export function parseWavHeader(buffer: ArrayBuffer): WavInfo {
  const view = new DataView(buffer)
  const tag = (off: number) =>
    String.fromCharCode(view.getUint8(off), view.getUint8(off + 1), view.getUint8(off + 2), view.getUint8(off + 3))
  if (tag(0) !== 'RIFF' || tag(8) !== 'WAVE') throw new Error('not a RIFF/WAVE file')
  if (tag(12) !== 'fmt ') throw new Error('missing fmt chunk')
  const channels = view.getUint16(22, true)
  const sampleRate = view.getUint32(24, true)
  const bitsPerSample = view.getUint16(34, true)
  if (tag(36) !== 'data') throw new Error('missing data chunk')
  const dataBytes = view.getUint32(40, true)
  return {
    sampleRate,
    channels,
    bitsPerSample,
    frames: dataBytes / (channels * (bitsPerSample / 8)),
  }
}

export function timestampedWavName(now: Date = new Date()): string {
  const pad = (n: number) => String(n).padStart(2, '0')
  return (
    `recording-${now.getFullYear()}${pad(now.getMonth() + 1)}${pad(now.getDate())}` +
    `-${pad(now.getHours())}${pad(now.getMinutes())}${pad(now.getSeconds())}.wav`
  )
}
