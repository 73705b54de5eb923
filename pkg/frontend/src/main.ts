import { Workbench } from './app.js'
import { EngineClient } from './client.js'

const engineUrl =
  new URLSearchParams(window.location.search).get('engine') ??
  window.location.origin

async function boot(): Promise<void> {
  const client = new EngineClient(engineUrl, (url, init) => fetch(url, init))
  const canvas = document.getElementById('ink') as HTMLCanvasElement
  const workbench = new Workbench(client, canvas, {
    latex: document.getElementById('latex')!,
    tree: document.getElementById('tree')!,
    symbols: document.getElementById('symbols')!,
    status: document.getElementById('status')!,
    diagnostics: document.getElementById('diagnostics')!,
  })

  document.getElementById('undo')!.addEventListener('click', () => void workbench.undo())
  document.getElementById('clear')!.addEventListener('click', () => void workbench.clear())
  document.getElementById('train-cg')!.addEventListener('click', () => void workbench.retrain('cg'))
  document.getElementById('train-ga')!.addEventListener('click', () => void workbench.retrain('ga'))
  document.getElementById('reconnect')!.addEventListener('click', () => void client.flush())

  try {
    await client.createSession()
  } catch (err) {
    document.getElementById('status')!.textContent =
      `cannot reach engine at ${engineUrl}: ${err instanceof Error ? err.message : err}`
  }
}

void boot()
