import { encodeWav } from './wav'

/**
 * Microphone capture. MediaRecorder collects compressed audio; on stop the
 * blob is decoded and re-encoded to the service's WAV contract (16 kHz
 * mono PCM-16), so the server sees a single format regardless of browser.
 */
export class MicRecorder {
  private stream: MediaStream | null = null
  private recorder: MediaRecorder | null = null
  private chunks: BlobPart[] = []

  async start(): Promise<void> {
    this.stream = await navigator.mediaDevices.getUserMedia({ audio: true })
    this.recorder = new MediaRecorder(this.stream)
    this.chunks = []
    this.recorder.ondataavailable = e => this.chunks.push(e.data)
    this.recorder.start()
  }

  async stop(): Promise<Blob> {
    const recorder = this.recorder
    if (!recorder) throw new Error('not recording')
    await new Promise<void>(resolve => {
      recorder.onstop = () => resolve()
      recorder.stop()
    })
    this.stream?.getTracks().forEach(t => t.stop())
    this.stream = null
    this.recorder = null
    const raw = new Blob(this.chunks, { type: recorder.mimeType || 'audio/webm' })
    return toContractWav(raw)
  }
}

export async function toContractWav(raw: Blob): Promise<Blob> {
  const ctx = new AudioContext()
  try {
    const decoded = await ctx.decodeAudioData(await raw.arrayBuffer())
    const channels: Float32Array[] = []
    for (let c = 0; c < decoded.numberOfChannels; c++) channels.push(decoded.getChannelData(c))
    return encodeWav(channels, decoded.sampleRate)
  } finally {
    await ctx.close()
  }
}
