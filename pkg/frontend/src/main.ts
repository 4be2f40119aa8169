import 'katex/dist/katex.min.css'
import './style.css'

import { ApiClient, ApiError, GenerateOptions } from './api'
import { MicRecorder } from './recorder'
import { renderLatex } from './render'
import { RecordingStore } from './state'
import { timestampedWavName } from './wav'

const store = new RecordingStore()
const api = new ApiClient('')
const mic = new MicRecorder()

const recordBtn = document.getElementById('record') as HTMLButtonElement
const playBtn = document.getElementById('play') as HTMLButtonElement
const downloadBtn = document.getElementById('download') as HTMLButtonElement
const convertBtn = document.getElementById('convert') as HTMLButtonElement
const status = document.getElementById('status') as HTMLParagraphElement
const modal = document.getElementById('modal') as HTMLDialogElement
const modalText = document.getElementById('modal-text') as HTMLParagraphElement
const modalLatex = document.getElementById('modal-latex') as HTMLElement
const modalPreview = document.getElementById('modal-preview') as HTMLDivElement

function statusLine(): string {
  const s = store.state
  switch (s.phase) {
    case 'idle':
      return 'Ready to record.'
    case 'recording':
      return 'Recording... click Record again to stop.'
    case 'recorded':
      return 'Recording ready. Play it back, download it, or convert to LaTeX.'
    case 'converting':
      return 'Converting...'
    case 'done':
      return 'Done. The LaTeX is in the window.'
    case 'error':
      return `Error (${s.errorStage ?? 'unknown'}): ${s.errorMessage ?? ''}`
  }
}

store.subscribe(() => {
  recordBtn.disabled = !store.canRecord
  recordBtn.textContent = store.isRecording ? 'Stop' : 'Record'
  playBtn.disabled = !store.canPlayback
  downloadBtn.disabled = !store.canDownload
  convertBtn.disabled = !store.canConvert
  status.textContent = statusLine()
})

recordBtn.addEventListener('click', async () => {
  if (store.isRecording) {
    try {
      const wav = await mic.stop()
      store.finishRecording(wav)
    } catch (err) {
      store.recordingFailed(err instanceof Error ? err.message : String(err))
    }
    return
  }
  store.startRecording()
  try {
    await mic.start()
  } catch (err) {
    store.recordingFailed(
      err instanceof Error ? `microphone unavailable: ${err.message}` : 'microphone unavailable',
    )
  }
})

playBtn.addEventListener('click', () => {
  const audio = store.state.audio
  if (!audio) return
  const url = URL.createObjectURL(audio)
  const player = new Audio(url)
  player.onended = () => URL.revokeObjectURL(url)
  void player.play()
})

downloadBtn.addEventListener('click', () => {
  const audio = store.state.audio
  if (!audio) return
  const url = URL.createObjectURL(audio)
  const anchor = document.createElement('a')
  anchor.href = url
  anchor.download = timestampedWavName()
  anchor.click()
  URL.revokeObjectURL(url)
})

function advancedOptions(): GenerateOptions {
  const opts: GenerateOptions = {}
  const k = (document.getElementById('opt-k') as HTMLInputElement).value
  if (k !== '') opts.k = Number(k)
  const measure = (document.getElementById('opt-measure') as HTMLSelectElement).value
  if (measure) opts.measure = measure
  const promptId = (document.getElementById('opt-prompt') as HTMLSelectElement).value
  if (promptId) opts.promptId = promptId
  return opts
}

function openModal(text: string, latex: string): void {
  modalText.textContent = text
  // the source shown must be byte-identical to the service response
  modalLatex.textContent = latex
  const html = renderLatex(latex)
  if (html !== null) {
    modalPreview.innerHTML = html
  } else {
    modalPreview.textContent = '(preview unavailable; raw source above)'
  }
  modal.showModal()
}

convertBtn.addEventListener('click', async () => {
  const audio = store.state.audio
  if (!audio) return
  store.startConvert()
  try {
    const result = await api.speechToLatex(audio, advancedOptions())
    store.convertSucceeded(result.text, result.latex)
    openModal(result.text, result.latex)
  } catch (err) {
    if (err instanceof ApiError) {
      store.convertFailed(err.stage, err.message, err.transcription)
    } else {
      store.convertFailed('transport', err instanceof Error ? err.message : String(err))
    }
  }
})

document.getElementById('copy-latex')?.addEventListener('click', () => {
  void navigator.clipboard.writeText(modalLatex.textContent ?? '')
})

document.getElementById('close-modal')?.addEventListener('click', () => modal.close())
