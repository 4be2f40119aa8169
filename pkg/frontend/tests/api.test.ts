import { afterEach, describe, expect, it, vi } from 'vitest'

import { ApiClient, ApiError } from '../src/api'

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { 'Content-Type': 'application/json' },
  })
}

afterEach(() => {
  vi.restoreAllMocks()
})

describe('ApiClient', () => {
  it('returns the latex byte-for-byte as served', async () => {
    const latex = '\\frac{\\alpha}{\\beta} + γ^{2}'
    const raw = JSON.stringify({ text: 'κείμενο', latex, examples: [] })
    vi.stubGlobal('fetch', vi.fn(async () => new Response(raw, { status: 200 })))
    const result = await new ApiClient().speechToLatex(new Blob(['x']))
    expect(result.latex).toBe(JSON.parse(raw).latex)
    expect(result.latex).toBe(latex)
  })

  it('posts generate overrides with wire field names', async () => {
    const fetchMock = vi.fn(async () => jsonResponse({ latex: 'x', examples: [], prompt_id: 'p3', k: 2, measure: 'manhattan' }))
    vi.stubGlobal('fetch', fetchMock)
    await new ApiClient().generate('κείμενο', { k: 2, measure: 'manhattan', promptId: 'p3' })
    const [url, init] = fetchMock.mock.calls[0] as unknown as [string, RequestInit]
    expect(url).toBe('/api/generate')
    expect(JSON.parse(init.body as string)).toEqual({
      text: 'κείμενο',
      k: 2,
      measure: 'manhattan',
      prompt_id: 'p3',
    })
  })

  it('sends audio as a multipart file part', async () => {
    const fetchMock = vi.fn(async () => jsonResponse({ text: 'a', duration_s: 0.2 }))
    vi.stubGlobal('fetch', fetchMock)
    await new ApiClient().transcribe(new Blob(['pcm'], { type: 'audio/wav' }))
    const [url, init] = fetchMock.mock.calls[0] as unknown as [string, RequestInit]
    expect(url).toBe('/api/transcribe')
    expect(init.body).toBeInstanceOf(FormData)
    expect((init.body as FormData).get('file')).toBeInstanceOf(Blob)
  })

  it('raises ApiError with the service stage', async () => {
    vi.stubGlobal(
      'fetch',
      vi.fn(async () => jsonResponse({ error: 'asr down', stage: 'transcription' }, 502)),
    )
    const err = await new ApiClient().transcribe(new Blob(['x'])).catch(e => e)
    expect(err).toBeInstanceOf(ApiError)
    expect(err.stage).toBe('transcription')
    expect(err.status).toBe(502)
  })

  it('keeps the transcription from a generation-stage failure', async () => {
    vi.stubGlobal(
      'fetch',
      vi.fn(async () =>
        jsonResponse({ error: 'llm down', stage: 'generation', text: 'άλφα συν βήτα' }, 502),
      ),
    )
    const err = await new ApiClient().speechToLatex(new Blob(['x'])).catch(e => e)
    expect(err).toBeInstanceOf(ApiError)
    expect(err.stage).toBe('generation')
    expect(err.transcription).toBe('άλφα συν βήτα')
  })

  it('survives a non-JSON error body', async () => {
    vi.stubGlobal('fetch', vi.fn(async () => new Response('gateway exploded', { status: 503 })))
    const err = await new ApiClient().health().catch(e => e)
    expect(err).toBeInstanceOf(ApiError)
    expect(err.status).toBe(503)
  })

  it('prefixes a configured base url', async () => {
    const fetchMock = vi.fn(async () => jsonResponse({ status: 'ok', version: 'x', index_size: 1 }))
    vi.stubGlobal('fetch', fetchMock)
    await new ApiClient('http://localhost:9999').health()
    const [url] = fetchMock.mock.calls[0] as unknown as [string]
    expect(url).toBe('http://localhost:9999/health')
  })
})
