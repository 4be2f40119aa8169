export interface RetrievedExample {
  pair_id: string
  score: number
}

export interface GenerateResponse {
  latex: string
  examples: RetrievedExample[]
  prompt_id: string
  k: number
  measure: string | null
}

export interface SpeechToLatexResponse {
  text: string
  latex: string
  examples: RetrievedExample[]
}

export interface GenerateOptions {
  k?: number
  measure?: string
  promptId?: string
}

/** Service error carrying the pipeline stage that failed. */
export class ApiError extends Error {
  stage: string
  status: number
  transcription: string | null

  constructor(message: string, stage: string, status: number, transcription: string | null = null) {
    super(message)
    this.stage = stage
    this.status = status
    this.transcription = transcription
  }
}

async function raiseFor(res: Response, fallbackStage: string): Promise<never> {
  let body: any = {}
  try {
    body = await res.json()
  } catch {
    // non-JSON error body; keep the fallbacks
  }
  throw new ApiError(
    body.detail || body.error || `request failed with status ${res.status}`,
    body.stage || fallbackStage,
    res.status,
    typeof body.text === 'string' ? body.text : null,
  )
}

export class ApiClient {
  constructor(private baseUrl: string = '') {}

  async health(): Promise<{ status: string; version: string; index_size: number }> {
    const res = await fetch(`${this.baseUrl}/health`)
    if (!res.ok) await raiseFor(res, 'health')
    return res.json()
  }

  async transcribe(audio: Blob): Promise<{ text: string; duration_s: number }> {
    const form = new FormData()
    form.append('file', audio, 'recording.wav')
    const res = await fetch(`${this.baseUrl}/api/transcribe`, { method: 'POST', body: form })
    if (!res.ok) await raiseFor(res, 'transcription')
    return res.json()
  }

  async generate(text: string, opts: GenerateOptions = {}): Promise<GenerateResponse> {
    const payload: Record<string, unknown> = { text }
    if (opts.k !== undefined) payload.k = opts.k
    if (opts.measure !== undefined) payload.measure = opts.measure
    if (opts.promptId !== undefined) payload.prompt_id = opts.promptId
    const res = await fetch(`${this.baseUrl}/api/generate`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(payload),
    })
    if (!res.ok) await raiseFor(res, 'generation')
    return res.json()
  }

  async speechToLatex(audio: Blob, opts: GenerateOptions = {}): Promise<SpeechToLatexResponse> {
    const form = new FormData()
    form.append('file', audio, 'recording.wav')
    if (opts.k !== undefined) form.append('k', String(opts.k))
    if (opts.measure !== undefined) form.append('measure', opts.measure)
    if (opts.promptId !== undefined) form.append('prompt_id', opts.promptId)
    const res = await fetch(`${this.baseUrl}/api/speech-to-latex`, { method: 'POST', body: form })
    if (!res.ok) await raiseFor(res, 'generation')
    return res.json()
  }
}
